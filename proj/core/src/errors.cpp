#include "spanqa/errors.hpp"

namespace spanqa {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::UnbalancedBrackets: return "UnbalancedBrackets";
    case Errc::EmptyConstituent: return "EmptyConstituent";
    case Errc::SpanOutOfBounds: return "SpanOutOfBounds";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::NeNotInSentence: return "NeNotInSentence";
    case Errc::SpanMismatch: return "SpanMismatch";
    case Errc::OffsetMismatch: return "OffsetMismatch";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::InitialSizeTooLarge: return "InitialSizeTooLarge";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::ZeroPrior: return "ZeroPrior";
    case Errc::GraphReuse: return "GraphReuse";
    case Errc::ToleranceExceeded: return "ToleranceExceeded";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::IdMismatch: return "IdMismatch";
    case Errc::AdapterFailure: return "AdapterFailure";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace spanqa
