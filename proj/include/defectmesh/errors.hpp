// Copyright 2026 The defectmesh Authors
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

#include <stdexcept>
#include <string>

namespace defectmesh {

/// Malformed layout, index out of range, or any other bad argument.
struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A matrix that is supposed to be unitary is not (within tolerance).
struct not_unitary : invalid_input {
    using invalid_input::invalid_input;
};

/// Matrix or settings dimensions disagree with the layout they are used with.
struct dimension_mismatch : invalid_input {
    using invalid_input::invalid_input;
};

/// An interchange document could not be parsed.
struct parse_error : invalid_input {
    using invalid_input::invalid_input;
};

/// The defects leave nothing usable, or their routing plans cannot be combined.
struct unsalvageable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Internal consistency check failed (e.g. the surviving crossings do not form
/// the expected brick wall). Indicates a planner bug rather than bad input.
struct invariant_violation : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace defectmesh
