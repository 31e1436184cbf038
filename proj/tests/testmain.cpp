#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <clocale>

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  return doctest::Context(argc, argv).run();
}
