#include "amerput/cli.hpp"

int main(int argc, char** argv) { return amerput::cli_main(argc, argv); }
