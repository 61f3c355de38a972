// Copyright 2026 The fpbits Authors
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

#pragma once

#include "fpbits/bit_training.hpp"
#include "fpbits/bitstring.hpp"
#include "fpbits/codebook.hpp"
#include "fpbits/config.hpp"
#include "fpbits/dataset.hpp"
#include "fpbits/error.hpp"
#include "fpbits/evaluation.hpp"
#include "fpbits/local_structures.hpp"
#include "fpbits/matching.hpp"
#include "fpbits/model.hpp"
#include "fpbits/pipeline.hpp"
#include "fpbits/subspace_fusion.hpp"
#include "fpbits/synth.hpp"
#include "fpbits/template_io.hpp"
