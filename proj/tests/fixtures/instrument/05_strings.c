#include <string.h>
int h(const char *s) {
  const char *msg = "if (s) { return; }";
  char open = '(';
  char quote = '\'';
  if (strcmp(s, "if (x)") == 0) return 1;
  if (s[0] == ')' || s[0] == '"') return 2;
  puts("escaped \" if (y) \\");
  return msg[0] + open + quote;
}
