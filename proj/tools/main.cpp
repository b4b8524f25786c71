#include "mcvar/cli.hpp"

int main(int argc, char** argv) { return mcvar::cli_main(argc, argv); }
