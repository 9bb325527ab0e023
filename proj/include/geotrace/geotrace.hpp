//
// Copyright 2026 The Geotrace Authors
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
//

#pragma once

#include "geotrace/aggregate.hpp"
#include "geotrace/assignment.hpp"
#include "geotrace/config.hpp"
#include "geotrace/csv.hpp"
#include "geotrace/curve.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/parallel.hpp"
#include "geotrace/random.hpp"
#include "geotrace/reconstruct.hpp"
#include "geotrace/report.hpp"
#include "geotrace/records.hpp"
#include "geotrace/synth.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/unicity.hpp"
#include "geotrace/utility.hpp"
#include "geotrace/zone.hpp"
