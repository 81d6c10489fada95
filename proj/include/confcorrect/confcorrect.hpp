// Copyright 2026 The confcorrect Authors.
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

#ifndef CONFCORRECT_CONFCORRECT_HPP
#define CONFCORRECT_CONFCORRECT_HPP

#include "confcorrect/alignment.hpp"
#include "confcorrect/confidence.hpp"
#include "confcorrect/corrector.hpp"
#include "confcorrect/error.hpp"
#include "confcorrect/evaluation.hpp"
#include "confcorrect/manifest.hpp"
#include "confcorrect/normalize.hpp"
#include "confcorrect/report.hpp"
#include "confcorrect/strategy.hpp"
#include "confcorrect/types.hpp"

#endif  // CONFCORRECT_CONFCORRECT_HPP
