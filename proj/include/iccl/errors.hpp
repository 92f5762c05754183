#pragma once

#include <stdexcept>
#include <string>

namespace iccl {

// One code per failure mode named in the module contracts.
enum class Errc {
    precondition,
    // corpus
    malformed_record,
    duplicate_demo_id,
    label_outside_label_set,
    // gateway
    transport,
    timeout,
    backend_refused,
    unsupported_by_backend,
    // retrieval
    dimension_mismatch,
    zero_vector,
    cache_invalid,
    // difficulty
    item_set_mismatch,
    fewer_than_two_judges,
    degenerate_denominator,
    invalid_ranking,
    // curriculum
    missing_score,
    seed_required,
    fixed_order_not_permutation,
    too_many_candidates,
    // promptkit
    missing_system_message,
    demo_kind_mismatch,
    invalid_label_variant,
    empty_label_serialization,
    // evaluation
    coverage_mismatch,
    mixed_tasks,
    zero_baseline,
    // runner
    config_invalid,
    io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message);
    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& message);

} // namespace iccl
