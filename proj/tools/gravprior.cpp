/*
 *  Copyright (C) 2026 The gravprior Authors
 *
 *  SPDX-License-Identifier: Apache-2.0
 *  See the file LICENSE.txt for more information.
 */

#include "cli_app.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return gravprior::cli::run(argc, argv, std::cout, std::cerr);
}
