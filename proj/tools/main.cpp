#include "commands.hpp"

int main(int argc, char** argv) { return hyperlabel::cli::run(argc, argv); }
