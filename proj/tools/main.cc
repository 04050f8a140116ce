#include "commands.h"

int main(int argc, char** argv) { return vp::cli::RunCli(argc, argv); }
