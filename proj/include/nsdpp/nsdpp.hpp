// Copyright (C) 2026 The nsdpp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "nsdpp/checkpoint.hpp"
#include "nsdpp/dataset.hpp"
#include "nsdpp/errors.hpp"
#include "nsdpp/evaluation.hpp"
#include "nsdpp/fisher.hpp"
#include "nsdpp/kernel.hpp"
#include "nsdpp/likelihood.hpp"
#include "nsdpp/linalg.hpp"
#include "nsdpp/matrix_analysis.hpp"
#include "nsdpp/parallel.hpp"
#include "nsdpp/symmetric_dpp.hpp"
#include "nsdpp/synthetic.hpp"
#include "nsdpp/trainer.hpp"
#include "nsdpp/types.hpp"
