#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "portcast/gbdt.hpp"
#include "portcast/linreg.hpp"

namespace portcast {

// Versioned JSON model files with a content checksum. Loading verifies the
// format tag, the version and the checksum before decoding; a truncated or
// edited file is rejected with a message naming what failed.

std::uint64_t fnv1a64(std::string_view data);

// `created` receives the file's creation timestamp when non-null. It lives in
// the envelope, outside the checksummed payload, so identical training runs
// still produce identical payload bytes.
void save_gbdt_model(const GbdtModel& model, const std::string& path);   // .gbtm
GbdtModel load_gbdt_model(const std::string& path, std::string* created = nullptr);

void save_linear_model(const LinearModel& model, const std::string& path);  // .linm
LinearModel load_linear_model(const std::string& path, std::string* created = nullptr);

// Training configuration as JSON. Any subset of the keys may appear; the
// rest keep their defaults. Unknown keys are an error.
TrainConfig load_train_config(const std::string& path);

}  // namespace portcast
