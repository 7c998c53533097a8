#include "fcseg/fusion.hpp"

namespace fcseg {

bool can_fuse(const ContrastAvailability& avail) {
  return avail.mri2 || (avail.mri1 && avail.mri3);
}

LabelMap decision_fuse(const ContrastLabels& labels, std::uint8_t background) {
  const auto avail = labels.availability();
  if (!can_fuse(avail))
    fail(ErrorCode::FusionPrecondition,
         "decision fusion needs the water-fat map, or both water-only and fat-only maps");
  const LabelMap* m1 = labels.mri1 ? &*labels.mri1 : nullptr;
  const LabelMap* m2 = labels.mri2 ? &*labels.mri2 : nullptr;
  const LabelMap* m3 = labels.mri3 ? &*labels.mri3 : nullptr;
  const LabelMap& ref = m2 ? *m2 : *m1;
  for (const LabelMap* m : {m1, m2, m3})
    if (m && m->grid().dims() != ref.grid().dims())
      fail(ErrorCode::DimMismatch, "contrast label maps differ in dims");

  std::vector<std::uint8_t> out(ref.size(), background);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (m2 && (*m2)[i] != background) {
      out[i] = (*m2)[i];
    } else if (m1 && m3 && (*m1)[i] == (*m3)[i] && (*m1)[i] != background) {
      out[i] = (*m1)[i];
    }
  }
  return LabelMap(ref.grid(), std::move(out));
}

}  // namespace fcseg
