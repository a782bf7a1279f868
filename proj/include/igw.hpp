// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "igw/analysis.hpp"
#include "igw/error.hpp"
#include "igw/exact_dist.hpp"
#include "igw/extended_count.hpp"
#include "igw/fixed_point.hpp"
#include "igw/gw_engine.hpp"
#include "igw/igw_process.hpp"
#include "igw/parallel.hpp"
#include "igw/reproduction_laws.hpp"
#include "igw/rng.hpp"
#include "igw/cli.hpp"
