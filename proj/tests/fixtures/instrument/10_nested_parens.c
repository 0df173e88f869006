int f(int a, int b);
int g;
int n(int a, int b, int c) {
  if (f(a, (b+c)) && g) return 1;
  if (((a))) return 2;
  return 0;
}
