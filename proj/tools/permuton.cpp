#include "permuton/cli.hpp"

int main(int argc, char** argv) { return permuton::run_cli(argc, argv); }
