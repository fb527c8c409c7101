#include "dsaemu/timing.hpp"

#include <algorithm>

namespace dsaemu {

bool TimingModel::valid() const {
    const double values[] = {t_submit_dwq, t_submit_swq_roundtrip, t_desc_fetch,
                             t_batch_fetch, t_translate, t_pe_fixed, b_pe_max,
                             b_fabric, t_core_fixed, t_core_per_byte, b_socket};
    for (double v : values)
        if (v <= 0) return false;
    for (const TierParams& t : tiers)
        if (t.read_bw <= 0 || t.write_bw <= 0 || t.extra_latency < 0) return false;
    return b_fabric >= b_pe_max;
}

double software_baseline(const TimingModel& tm, Opcode, uint64_t size, MemTier src_tier,
                         MemTier dst_tier) {
    const TierParams& src = tm.tier(src_tier);
    const TierParams& dst = tm.tier(dst_tier);
    const double core_bw = 1.0 / tm.t_core_per_byte;
    const double bw = std::min({core_bw, src.read_bw, dst.write_bw});
    return tm.t_core_fixed + src.extra_latency + dst.extra_latency +
           static_cast<double>(size) / bw;
}

}  // namespace dsaemu
