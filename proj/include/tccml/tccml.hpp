/*
 * Copyright 2026 The tccml Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "tccml/checkpoint.hpp"
#include "tccml/config.hpp"
#include "tccml/data.hpp"
#include "tccml/error.hpp"
#include "tccml/eval.hpp"
#include "tccml/io.hpp"
#include "tccml/loss.hpp"
#include "tccml/model.hpp"
#include "tccml/optimizer.hpp"
#include "tccml/sampler.hpp"
#include "tccml/synth.hpp"
#include "tccml/trainer.hpp"
