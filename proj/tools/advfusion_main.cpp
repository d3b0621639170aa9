// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "advf/cli.hpp"

int main(int argc, char** argv) { return advf::run_subcommand(argc, argv, std::cout, std::cerr); }
