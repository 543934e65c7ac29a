// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

namespace cgfuzz {

/// Element dtypes supported by the graph IR.
enum class DType : uint8_t { F32, F64, I32, I64, Bool };

/// Structural dtype families used by operator constraints.
enum class DTypeClass : uint8_t { Float, Numeric, Any };

constexpr int kMaxRank = 8;
constexpr int64_t kMaxExtent = 1 << 16;

const char* dtype_name(DType d);
bool dtype_from_name(const std::string& s, DType& out);
bool is_float(DType d);
bool is_numeric(DType d);  // everything except Bool
bool dtype_in_class(DType d, DTypeClass c);

/// Element dtype plus shape. Rank 0 means scalar; the empty shape product is 1.
struct TensorType {
    DType dtype = DType::F32;
    std::vector<int64_t> shape;

    int rank() const { return static_cast<int>(shape.size()); }
    int64_t element_count() const {
        int64_t n = 1;
        for (int64_t e : shape) n *= e;
        return n;
    }
    bool within_caps() const {
        if (rank() > kMaxRank) return false;
        for (int64_t e : shape)
            if (e < 0 || e > kMaxExtent) return false;
        return true;
    }
    bool operator==(const TensorType& o) const = default;
};

std::string to_string(const TensorType& t);

/// A concrete tensor: type plus flat row-major buffer.
///
/// All arithmetic runs in F64 internally; values are quantized to the declared
/// dtype at every node boundary so that constant folding and interpretation
/// agree bit-for-bit.
struct TensorValue {
    TensorType type;
    std::vector<double> data;

    bool conforms() const {
        return static_cast<int64_t>(data.size()) == type.element_count();
    }
};

/// Round a raw double to the value representable under `d`.
double quantize(DType d, double x);
void quantize_buffer(DType d, std::vector<double>& buf);

}  // namespace cgfuzz
