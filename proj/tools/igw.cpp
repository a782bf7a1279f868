// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#include "igw/cli.hpp"

int main(int argc, char** argv) { return igw::cli::run(argc, argv); }
