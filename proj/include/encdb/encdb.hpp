// Copyright 2026 The encdb Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "encdb/crypto.hpp"
#include "encdb/circuits.hpp"
#include "encdb/table.hpp"
#include "encdb/predicate.hpp"
#include "encdb/relalg.hpp"
#include "encdb/plan.hpp"
#include "encdb/protocol.hpp"
#include "encdb/oracle.hpp"
#include "encdb/csv.hpp"
#include "encdb/engine.hpp"
