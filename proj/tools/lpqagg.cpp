#include "lpq/cli.hpp"

int main(int argc, char **argv) { return lpq::cli::run(argc, argv); }
