// SPDX-License-Identifier: MIT
#pragma once

#include "bht/coeffs.hpp"
#include "bht/diff.hpp"
#include "bht/error.hpp"
#include "bht/eval.hpp"
#include "bht/io.hpp"
#include "bht/linalg.hpp"
#include "bht/mdt.hpp"
#include "bht/model.hpp"
#include "bht/tensor.hpp"
