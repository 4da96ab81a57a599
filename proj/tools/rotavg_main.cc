#include "rotavg/cli.h"

int main(int argc, char** argv) { return rotavg::RunCli(argc, argv); }
