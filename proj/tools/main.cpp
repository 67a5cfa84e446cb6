#include "cli.hpp"

int main(int argc, char** argv) { return hetmarket::cli::main_entry(argc, argv); }
