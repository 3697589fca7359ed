#include "openhealth/memory.hpp"

#include <fmt/format.h>

#include "openhealth/model_io.hpp"

namespace openhealth {

MemoryLedger memory_footprint(std::size_t window, std::size_t channels, LayerSizes model, bool with_stats,
                              const DeviceProfile& profile) {
    MemoryLedger m;
    m.sample_buffer_bytes = window * channels * 2;
    m.feature_bytes = 8 * model.inputs;
    m.activation_bytes = 8 * (model.hidden + model.outputs);
    m.sram_used_bytes = m.sample_buffer_bytes + m.feature_bytes + m.activation_bytes + m.stack_bytes;
    m.model_bytes = quantized_blob_size(model, with_stats);
    m.flash_used_bytes = m.model_bytes + m.code_bytes;

    if (m.sram_used_bytes > profile.sram_bytes)
        throw MemoryBudgetError("sram", fmt::format("SRAM budget exceeded: {} bytes needed, {} available "
                                                    "(sample buffer alone {} bytes)",
                                                    m.sram_used_bytes, profile.sram_bytes, m.sample_buffer_bytes));
    if (m.flash_used_bytes > profile.flash_bytes)
        throw MemoryBudgetError("flash", fmt::format("flash budget exceeded: {} bytes needed, {} available",
                                                     m.flash_used_bytes, profile.flash_bytes));
    return m;
}

} // namespace openhealth
