// Copyright 2026 The cqdsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "cqdsim/numerics.hpp"
#include "cqdsim/random.hpp"
#include "cqdsim/oracle.hpp"
#include "cqdsim/continuous.hpp"
#include "cqdsim/discretize.hpp"
#include "cqdsim/gadget.hpp"
#include "cqdsim/segment.hpp"
#include "cqdsim/recovery.hpp"
#include "cqdsim/experiment.hpp"
#include "cqdsim/verify.hpp"
