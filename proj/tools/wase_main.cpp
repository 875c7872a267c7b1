#include "wase/cli.hpp"

int main(int argc, char** argv) { return wase::cli::run(argc, argv); }
