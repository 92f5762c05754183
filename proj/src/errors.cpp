#include "iccl/errors.hpp"

namespace iccl {

const char* errc_name(Errc code) {
    switch (code) {
        case Errc::precondition: return "Precondition";
        case Errc::malformed_record: return "MalformedRecord";
        case Errc::duplicate_demo_id: return "DuplicateDemoId";
        case Errc::label_outside_label_set: return "LabelOutsideLabelSet";
        case Errc::transport: return "Transport";
        case Errc::timeout: return "Timeout";
        case Errc::backend_refused: return "BackendRefused";
        case Errc::unsupported_by_backend: return "UnsupportedByBackend";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::zero_vector: return "ZeroVector";
        case Errc::cache_invalid: return "CacheInvalid";
        case Errc::item_set_mismatch: return "ItemSetMismatch";
        case Errc::fewer_than_two_judges: return "FewerThanTwoJudges";
        case Errc::degenerate_denominator: return "DegenerateDenominator";
        case Errc::invalid_ranking: return "InvalidRanking";
        case Errc::missing_score: return "MissingScore";
        case Errc::seed_required: return "SeedRequired";
        case Errc::fixed_order_not_permutation: return "FixedOrderNotPermutation";
        case Errc::too_many_candidates: return "TooManyCandidates";
        case Errc::missing_system_message: return "MissingSystemMessage";
        case Errc::demo_kind_mismatch: return "DemoKindMismatch";
        case Errc::invalid_label_variant: return "InvalidLabelVariant";
        case Errc::empty_label_serialization: return "EmptyLabelSerialization";
        case Errc::coverage_mismatch: return "CoverageMismatch";
        case Errc::mixed_tasks: return "MixedTasks";
        case Errc::zero_baseline: return "ZeroBaseline";
        case Errc::config_invalid: return "ConfigInvalid";
        case Errc::io_error: return "IoError";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace iccl
