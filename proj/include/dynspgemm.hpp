// Copyright 2026 The dynspgemm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header for the distributed dynamic SpGEMM library.

#pragma once

#include "dynspgemm/aggregate.hpp"
#include "dynspgemm/bloom.hpp"
#include "dynspgemm/dcsr.hpp"
#include "dynspgemm/dist_matrix.hpp"
#include "dynspgemm/dist_spgemm.hpp"
#include "dynspgemm/dynamic_block.hpp"
#include "dynspgemm/flat_index.hpp"
#include "dynspgemm/grid.hpp"
#include "dynspgemm/local_spgemm.hpp"
#include "dynspgemm/parallel.hpp"
#include "dynspgemm/phases.hpp"
#include "dynspgemm/redistribute.hpp"
#include "dynspgemm/semiring.hpp"
#include "dynspgemm/transport.hpp"
#include "dynspgemm/types.hpp"
