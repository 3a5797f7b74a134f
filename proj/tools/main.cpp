#include "cli.hpp"

int main(int argc, char** argv) { return xxdeph::cli::main_entry(argc, argv); }
