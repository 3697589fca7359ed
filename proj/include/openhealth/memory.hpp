#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "openhealth/core.hpp"
#include "openhealth/mlp.hpp"

namespace openhealth {

inline constexpr std::size_t kStackReserveBytes = 4096;
inline constexpr std::size_t kCodeReserveBytes = 32768;

// Modeled on-device memory use.
//   sram  = W * channels * 2   (int16 ring buffer)
//         + 8 * D              (feature scratch, D = model inputs)
//         + 8 * (H + C)        (activations)
//         + stack reserve
//   flash = quantized model blob + code/constant reserve
struct MemoryLedger {
    std::size_t sample_buffer_bytes = 0;
    std::size_t feature_bytes = 0;
    std::size_t activation_bytes = 0;
    std::size_t stack_bytes = kStackReserveBytes;
    std::size_t sram_used_bytes = 0;
    std::size_t model_bytes = 0;
    std::size_t code_bytes = kCodeReserveBytes;
    std::size_t flash_used_bytes = 0;
};

class MemoryBudgetError : public std::runtime_error {
  public:
    MemoryBudgetError(std::string budget, const std::string& what)
        : std::runtime_error(what), budget_(std::move(budget)) {}
    // "sram" or "flash".
    const std::string& budget() const { return budget_; }

  private:
    std::string budget_;
};

// Throws MemoryBudgetError naming the first overflowing budget.
MemoryLedger memory_footprint(std::size_t window, std::size_t channels, LayerSizes model, bool with_stats,
                              const DeviceProfile& profile);

} // namespace openhealth
