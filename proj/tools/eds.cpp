#include "eds/cli.hpp"

int main(int argc, char** argv) { return eds::cli_main(argc, argv); }
