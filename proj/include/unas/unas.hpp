// Copyright 2026 The unas Authors.
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

#ifndef UNAS_UNAS_HPP_
#define UNAS_UNAS_HPP_

#include "unas/costmodel.hpp"
#include "unas/decoder.hpp"
#include "unas/error.hpp"
#include "unas/evolution.hpp"
#include "unas/fitness.hpp"
#include "unas/genome.hpp"
#include "unas/protocol.hpp"
#include "unas/rng.hpp"
#include "unas/searchloop.hpp"

#endif  // UNAS_UNAS_HPP_
