#include "fusionkit/types.hpp"

#include <string>

#include "fusionkit/errors.hpp"

namespace fusionkit {

const char* family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::gaussian: return "gaussian";
    case ModelFamily::skew_normal: return "skew_normal";
    case ModelFamily::gmm: return "gmm";
    case ModelFamily::snmix: return "snmix";
  }
  return "unknown";
}

ModelFamily family_from_name(const std::string& name) {
  if (name == "gaussian") return ModelFamily::gaussian;
  if (name == "skew_normal") return ModelFamily::skew_normal;
  if (name == "gmm") return ModelFamily::gmm;
  if (name == "snmix") return ModelFamily::snmix;
  throw ValidationError("unknown model family: " + name);
}

}  // namespace fusionkit
