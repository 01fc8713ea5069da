#include <fstream>

#include "nys/io.hpp"
#include "nys/layers.hpp"

namespace nys {

namespace {

constexpr std::string_view kCheckpointMagic = "NYSCKPT\x01";

enum class LayerTag : std::uint32_t { dense = 1, nystrom = 2, multikernel = 3, fastfood = 4 };

struct SidecarWriter {
  std::filesystem::path base;
  std::size_t next = 0;

  std::string write(const LandmarkSet& ls) {
    const std::string name = base.filename().string() + ".lm" + std::to_string(next++) + ".bin";
    save_landmarks(base.parent_path() / name, ls);
    return name;
  }
};

void write_nystrom(std::ostream& out, const NystromLayer& l, SidecarWriter& sc) {
  binio::write<std::uint8_t>(out, l.adaptive() ? 1 : 0);
  binio::write_string(out, sc.write(l.landmarks()));
  binio::write_matrix(out, l.w());
}

NystromLayer read_nystrom(std::istream& in, const std::filesystem::path& dir) {
  const bool adaptive = binio::read<std::uint8_t>(in, "nystrom layer") != 0;
  const std::string sidecar = binio::read_string(in, "nystrom sidecar name");
  Matrix w = binio::read_matrix(in, "nystrom W");
  return NystromLayer(load_landmarks(dir / sidecar), adaptive, std::move(w));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, LayerStack& stack) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileError("cannot write " + path.string());
  SidecarWriter sc{path};
  binio::write_magic(out, kCheckpointMagic);
  binio::write<std::uint32_t>(out, kCheckpointVersion);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(stack.size()));
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const Layer& layer = stack.layer(i);
    if (const auto* d = dynamic_cast<const DenseLayer*>(&layer)) {
      binio::write(out, LayerTag::dense);
      binio::write<std::uint8_t>(out, d->activation() == Activation::relu ? 1 : 0);
      binio::write_matrix(out, d->weight());
      binio::write_matrix(out, d->bias());
    } else if (const auto* n = dynamic_cast<const NystromLayer*>(&layer)) {
      binio::write(out, LayerTag::nystrom);
      write_nystrom(out, *n, sc);
    } else if (const auto* mk = dynamic_cast<const MultiKernelLayer*>(&layer)) {
      binio::write(out, LayerTag::multikernel);
      binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(mk->sublayers().size()));
      binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(mk->group_slices().size()));
      for (const auto& [b, e] : mk->group_slices()) {
        binio::write<std::uint64_t>(out, b);
        binio::write<std::uint64_t>(out, e);
      }
      for (const auto& s : mk->sublayers()) write_nystrom(out, s, sc);
    } else if (const auto* ff = dynamic_cast<const FastfoodLayer*>(&layer)) {
      binio::write(out, LayerTag::fastfood);
      binio::write<std::uint8_t>(out, ff->adaptive() ? 1 : 0);
      binio::write<std::uint64_t>(out, ff->input_dim());
      const auto blocks = ff->current_blocks();
      binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
      for (const auto& b : blocks) {
        binio::write<std::uint64_t>(out, b.d_pad);
        binio::write<double>(out, b.sigma);
        for (std::size_t p : b.perm) binio::write<std::uint64_t>(out, p);
        binio::write_doubles(out, b.s_diag);
        binio::write_doubles(out, b.g_diag);
        binio::write_doubles(out, b.b_diag);
      }
    } else {
      throw Error("checkpoint: unsupported layer kind " + layer.kind());
    }
  }
  if (!out) throw FileError("error writing " + path.string());
}

LayerStack load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  binio::expect_magic(in, kCheckpointMagic, "checkpoint");
  const auto version = binio::read<std::uint32_t>(in, "checkpoint version");
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported");
  const auto count = binio::read<std::uint32_t>(in, "checkpoint layer count");
  const auto dir = path.parent_path();
  LayerStack stack;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto tag = binio::read<LayerTag>(in, "layer tag");
    switch (tag) {
      case LayerTag::dense: {
        const bool relu = binio::read<std::uint8_t>(in, "dense layer") != 0;
        Matrix w = binio::read_matrix(in, "dense weight");
        Matrix b = binio::read_matrix(in, "dense bias");
        stack.emplace<DenseLayer>(std::move(w), std::move(b), relu ? Activation::relu : Activation::none);
        break;
      }
      case LayerTag::nystrom:
        stack.emplace<NystromLayer>(read_nystrom(in, dir));
        break;
      case LayerTag::multikernel: {
        const auto subs = binio::read<std::uint32_t>(in, "multikernel header");
        const auto nslices = binio::read<std::uint32_t>(in, "multikernel header");
        std::vector<MultiKernelLayer::Slice> slices;
        for (std::uint32_t s = 0; s < nslices; ++s) {
          const auto b = binio::read<std::uint64_t>(in, "multikernel slice");
          const auto e = binio::read<std::uint64_t>(in, "multikernel slice");
          slices.emplace_back(b, e);
        }
        std::vector<NystromLayer> layers;
        for (std::uint32_t s = 0; s < subs; ++s) layers.push_back(read_nystrom(in, dir));
        stack.emplace<MultiKernelLayer>(std::move(layers), std::move(slices));
        break;
      }
      case LayerTag::fastfood: {
        const bool adaptive = binio::read<std::uint8_t>(in, "fastfood layer") != 0;
        const auto input_dim = binio::read<std::uint64_t>(in, "fastfood layer");
        const auto nblocks = binio::read<std::uint32_t>(in, "fastfood layer");
        std::vector<FastfoodBlock> blocks(nblocks);
        for (auto& b : blocks) {
          b.d_pad = binio::read<std::uint64_t>(in, "fastfood block");
          if (b.d_pad == 0 || b.d_pad > (1u << 24)) throw FormatError("implausible fastfood block size");
          b.sigma = binio::read<double>(in, "fastfood block");
          b.perm.resize(b.d_pad);
          for (auto& p : b.perm) p = binio::read<std::uint64_t>(in, "fastfood permutation");
          b.s_diag.resize(b.d_pad);
          b.g_diag.resize(b.d_pad);
          b.b_diag.resize(b.d_pad);
          binio::read_doubles(in, b.s_diag, "fastfood diagonal");
          binio::read_doubles(in, b.g_diag, "fastfood diagonal");
          binio::read_doubles(in, b.b_diag, "fastfood diagonal");
        }
        stack.emplace<FastfoodLayer>(std::move(blocks), adaptive, input_dim);
        break;
      }
      default:
        throw FormatError("checkpoint: unknown layer tag " + std::to_string(static_cast<std::uint32_t>(tag)));
    }
  }
  return stack;
}

}  // namespace nys
