#include "epibarrier/integrate.hpp"

namespace epibarrier {

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::SignChange: return "SIGN_CHANGE";
    case EventKind::DomainExit: return "DOMAIN_EXIT";
    case EventKind::IFloor: return "I_FLOOR";
    case EventKind::Horizon: return "HORIZON";
  }
  return "?";
}

std::string_view to_string(Face f) {
  switch (f) {
    case Face::None: return "none";
    case Face::Cap: return "I=I_max";
    case Face::SZero: return "S=0";
    case Face::EZero: return "E=0";
    case Face::IZero: return "I=0";
    case Face::SimplexSum: return "sum=1";
  }
  return "?";
}

}  // namespace epibarrier
