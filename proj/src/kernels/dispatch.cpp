#include <atomic>

#include "pnc/kernels.hpp"

namespace pnc::kernels {
namespace {

const KernelTable* detect() {
    if (const KernelTable* t = avx2_table()) return t;
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{detect()};
    return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Isa isa) {
    const KernelTable* t = isa == Isa::avx2 ? avx2_table() : &scalar_table();
    if (t == nullptr) return false;
    slot().store(t, std::memory_order_release);
    return true;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace pnc::kernels
