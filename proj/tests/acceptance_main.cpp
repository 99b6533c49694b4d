#include <iostream>

#include "fermiwalk/acceptance.hpp"

int main() { return fqw::run_acceptance(std::cout) == 0 ? 0 : 1; }
