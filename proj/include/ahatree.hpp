/*
 * Copyright 2026 The AHA-tree Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AHATREE_AHATREE_HPP
#define AHATREE_AHATREE_HPP

#include "ahatree/aha_tree.hpp"
#include "ahatree/baselines.hpp"
#include "ahatree/core.hpp"
#include "ahatree/index.hpp"

#endif  // AHATREE_AHATREE_HPP
