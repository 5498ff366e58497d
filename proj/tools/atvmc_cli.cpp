#include <iostream>

int main() {
  std::cout << "atvmc: not wired yet\n";
  return 0;
}
