#pragma once

// The vendored copy is a single header without a separate forward file;
// including it fully keeps declarations consistent.
#include <json.hpp>
