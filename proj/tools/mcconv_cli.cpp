#include <cstdio>

int main() {
  std::puts("mcconv: not yet wired");
  return 0;
}
