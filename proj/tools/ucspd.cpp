#include <iostream>

#include "ucspd_app/cli.hpp"

int main(int argc, char** argv) { return ucspd::app::run_cli(argc, argv, std::cout, std::cerr); }
