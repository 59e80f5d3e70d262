#include "lecam/cli.hpp"

int main(int argc, char** argv) { return lecam::cli_main(argc, argv); }
