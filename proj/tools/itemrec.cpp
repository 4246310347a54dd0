#include "itemrec/cli.hpp"

int main(int argc, char** argv) { return itemrec::cli::run(argc, argv); }
