#include "cli_commands.hpp"

int main(int argc, char** argv) { return compound_kge::cli::run(argc, argv); }
