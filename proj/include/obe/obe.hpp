// Copyright 2026 The obe Authors
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

#include "obe/config.hpp"
#include "obe/constants.hpp"
#include "obe/doppler.hpp"
#include "obe/driver.hpp"
#include "obe/dynamics.hpp"
#include "obe/error.hpp"
#include "obe/faddeeva.hpp"
#include "obe/liouvillian.hpp"
#include "obe/mbe.hpp"
#include "obe/optics.hpp"
#include "obe/steady.hpp"
#include "obe/system.hpp"
