#pragma once

// JSON forms of the library's value types. Complex numbers are [re, im];
// matrices are {"rows", "cols", "data"} with row-major [re, im] entries.

#include <nlohmann/json.hpp>

#include "qlink/channel.hpp"
#include "qlink/dual_rail.hpp"
#include "qlink/mixing.hpp"
#include "qlink/tensor.hpp"
#include "qlink/zero_error.hpp"

namespace qlink {

nlohmann::json to_json(Complex z);
nlohmann::json to_json(const Matrix& m);
nlohmann::json to_json(const Vector& v);
nlohmann::json to_json(const HilbertFactorization& space);
nlohmann::json to_json(const KrausChannel& ch);
nlohmann::json to_json(const ClassicalZeroErrorCode& code);
nlohmann::json to_json(const QuantumZeroErrorCode& code);
nlohmann::json to_json(const SpectralReport& report);
nlohmann::json to_json(const ProtocolRun& run);
nlohmann::json to_json(const RateReport& report);

Complex complex_from_json(const nlohmann::json& j);
Matrix matrix_from_json(const nlohmann::json& j);
HilbertFactorization space_from_json(const nlohmann::json& j);
KrausChannel channel_from_json(const nlohmann::json& j);

}  // namespace qlink
