#pragma once

#include <nlohmann/json.hpp>

namespace uryforge {

// Certificates and logs must serialize byte-identically across runs, so
// object fields keep their insertion order everywhere.
using Json = nlohmann::ordered_json;

}  // namespace uryforge
