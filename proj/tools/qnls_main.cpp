#include <cstdio>

int main() {
  std::puts("qnls: subcommands land with the full module set");
  return 0;
}
