#pragma once

// Maps the conventional <nlohmann/json.hpp> include onto the vendored
// single header (vendor/json.hpp, on the include path).
#include <json.hpp>
