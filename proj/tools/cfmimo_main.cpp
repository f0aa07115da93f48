// SPDX-License-Identifier: Apache-2.0
#include "cfmimo/cli.hpp"

int main(int argc, char** argv) { return cfmimo::cli::main(argc, argv); }
