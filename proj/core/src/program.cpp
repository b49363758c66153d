#include "terasim/program.hpp"

#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace terasim {

Instr Instr::load(uint8_t reg, uint64_t a) {
  Instr i{};
  i.kind = InstrKind::Load;
  i.dst = reg;
  i.addr = a;
  return i;
}

Instr Instr::store(uint64_t a, uint8_t reg) {
  Instr i{};
  i.kind = InstrKind::Store;
  i.nsrc = 1;
  i.src[0] = reg;
  i.addr = a;
  return i;
}

Instr Instr::amo_add(uint8_t dst, uint64_t a, uint8_t src_reg) {
  Instr i{};
  i.kind = InstrKind::AmoAdd;
  i.dst = dst;
  i.nsrc = 1;
  i.src[0] = src_reg;
  i.addr = a;
  return i;
}

Instr Instr::compute(Opcode op, uint8_t dst, std::initializer_list<uint8_t> srcs,
                     int32_t imm, uint16_t op_count, uint8_t latency) {
  Instr i{};
  i.kind = InstrKind::Compute;
  i.op = op;
  i.dst = dst;
  i.nsrc = uint8_t(srcs.size());
  uint8_t k = 0;
  for (uint8_t s : srcs) i.src[k++] = s;
  i.imm = imm;
  i.op_count = op_count;
  i.latency = latency;
  return i;
}

Instr Instr::movi(uint8_t dst, int32_t value) {
  return compute(Opcode::Movi, dst, {}, value, 1, 1);
}

Instr Instr::barrier(int32_t id) {
  Instr i{};
  i.kind = InstrKind::Barrier;
  i.imm = id;
  return i;
}

Instr Instr::dma_start(int32_t desc_idx) {
  Instr i{};
  i.kind = InstrKind::DmaStart;
  i.imm = desc_idx;
  return i;
}

Instr Instr::dma_wait() {
  Instr i{};
  i.kind = InstrKind::DmaWait;
  return i;
}

Instr Instr::halt() {
  Instr i{};
  i.kind = InstrKind::Halt;
  return i;
}

int64_t rnd_shr(int64_t v, uint32_t sh) {
  if (sh == 0) return v;
  return (v + (int64_t(1) << (sh - 1))) >> sh;
}

int32_t q15_sat(int64_t v) {
  if (v > 32767) return 32767;
  if (v < -32768) return -32768;
  return int32_t(v);
}

uint32_t cpx_pack(int32_t re, int32_t im) {
  return (uint32_t(im) << 16) | (uint32_t(re) & 0xffffu);
}

int32_t cpx_re(uint32_t w) { return int32_t(int16_t(w & 0xffffu)); }
int32_t cpx_im(uint32_t w) { return int32_t(int16_t(w >> 16)); }

int16_t q15_from_double(double v) {
  long r = std::lround(v * 32768.0);
  return int16_t(q15_sat(r));
}

double q15_to_double(int32_t v) { return double(v) / 32768.0; }

namespace {

uint64_t isqrt64(uint64_t x) {
  if (x == 0) return 0;
  uint64_t r = uint64_t(std::sqrt(double(x)));
  while (r > 0 && r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

struct Cpx32 {
  int64_t re, im;
};

Cpx32 cmul64(uint32_t a, uint32_t b, bool conj_a, bool conj_b) {
  int64_t ar = cpx_re(a), ai = cpx_im(a);
  int64_t br = cpx_re(b), bi = cpx_im(b);
  if (conj_a) ai = -ai;
  if (conj_b) bi = -bi;
  return {ar * br - ai * bi, ar * bi + ai * br};
}

uint32_t cpx_addsub(uint32_t a, uint32_t b, bool sub, bool rot_j, uint32_t sh) {
  const int64_t ar = cpx_re(a), ai = cpx_im(a);
  int64_t br = cpx_re(b), bi = cpx_im(b);
  if (rot_j) {  // b := j*b
    const int64_t t = br;
    br = -bi;
    bi = t;
  }
  const int64_t re = sub ? ar - br : ar + br;
  const int64_t im = sub ? ai - bi : ai + bi;
  return cpx_pack(q15_sat(rnd_shr(re, sh)), q15_sat(rnd_shr(im, sh)));
}

}  // namespace

uint32_t alu_eval(const Instr& in, const uint32_t regs[kNumRegs]) {
  if (in.kind != InstrKind::Compute) throw std::logic_error("alu_eval: not a COMPUTE");
  const auto s = [&](int i) -> uint32_t {
    if (i >= in.nsrc) throw std::invalid_argument("decode fault: missing source");
    return regs[in.src[i]];
  };
  const auto si = [&](int i) -> int32_t { return int32_t(s(i)); };
  const uint32_t sh = uint32_t(in.imm);

  switch (in.op) {
    case Opcode::Movi: return uint32_t(in.imm);
    case Opcode::Add: return uint32_t(si(0) + si(1));
    case Opcode::Sub: return uint32_t(si(0) - si(1));
    case Opcode::Mul: return uint32_t(int64_t(si(0)) * si(1));
    case Opcode::MulQ: return uint32_t(int32_t(rnd_shr(int64_t(si(0)) * si(1), sh)));
    case Opcode::Shra: return uint32_t(int32_t(rnd_shr(si(0), sh)));
    case Opcode::DivQ: {
      // Saturates instead of trapping: straight-line programs cannot branch
      // around a bad divisor, so numeric faults must degrade to data.
      const int64_t den = si(1);
      const int64_t num = int64_t(si(0)) << sh;
      if (den == 0)
        return uint32_t(num >= 0 ? INT32_MAX : INT32_MIN);
      const int64_t q = (2 * num + (((num >= 0) == (den >= 0)) ? den : -den)) / (2 * den);
      return uint32_t(int32_t(std::clamp<int64_t>(q, INT32_MIN, INT32_MAX)));
    }
    case Opcode::SqrtQ: {
      // Negative operand yields 0 (see DivQ); callers flag it separately.
      const int64_t v = si(0);
      if (v < 0) return 0;
      return uint32_t(int32_t(isqrt64(uint64_t(v) << sh)));
    }
    case Opcode::CAdd: return cpx_addsub(s(0), s(1), false, false, sh);
    case Opcode::CSub: return cpx_addsub(s(0), s(1), true, false, sh);
    case Opcode::CAddJ: return cpx_addsub(s(0), s(1), false, true, sh);
    case Opcode::CSubJ: return cpx_addsub(s(0), s(1), true, true, sh);
    case Opcode::CMul:
    case Opcode::CMulC: {
      const Cpx32 p = cmul64(s(0), s(1), false, in.op == Opcode::CMulC);
      return cpx_pack(q15_sat(rnd_shr(p.re, 15 + sh)), q15_sat(rnd_shr(p.im, 15 + sh)));
    }
    case Opcode::CMulRe: return uint32_t(int32_t(cmul64(s(0), s(1), false, false).re));
    case Opcode::CMulIm: return uint32_t(int32_t(cmul64(s(0), s(1), false, false).im));
    case Opcode::CMacRe:
      return uint32_t(si(0) + int32_t(cmul64(s(1), s(2), false, false).re));
    case Opcode::CMacIm:
      return uint32_t(si(0) + int32_t(cmul64(s(1), s(2), false, false).im));
    case Opcode::CMacReC:
      return uint32_t(si(0) + int32_t(cmul64(s(1), s(2), true, false).re));
    case Opcode::CMacImC:
      return uint32_t(si(0) + int32_t(cmul64(s(1), s(2), true, false).im));
    case Opcode::CNormAcc: {
      const int64_t re = cpx_re(s(1)), im = cpx_im(s(1));
      return uint32_t(si(0) + int32_t(re * re + im * im));
    }
    case Opcode::Pack:
      return cpx_pack(q15_sat(rnd_shr(si(0), sh)), q15_sat(rnd_shr(si(1), sh)));
    case Opcode::UnpackRe: return uint32_t(cpx_re(s(0)) << sh);
    case Opcode::UnpackIm: return uint32_t(cpx_im(s(0)) << sh);
  }
  throw std::invalid_argument("decode fault: unknown opcode");
}

// ---------------------------------------------------------------------------
// Program text format

namespace {

struct TextCursor {
  const std::string& line;
  size_t pos = 0;
  int lineno;

  void skip_ws() {
    while (pos < line.size() && std::isspace(uint8_t(line[pos]))) ++pos;
  }
  bool eof() {
    skip_ws();
    return pos >= line.size();
  }
  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("program line " + std::to_string(lineno) + ": " + msg);
  }
  bool accept(char c) {
    skip_ws();
    if (pos < line.size() && line[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }
  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < line.size() && (std::isalnum(uint8_t(line[pos])) || line[pos] == '_' ||
                                 line[pos] == '$' || line[pos] == '.'))
      ++pos;
    if (start == pos) fail("expected identifier");
    return line.substr(start, pos - start);
  }
};

class ExprEval {
public:
  std::map<std::string, int64_t> consts;

  int64_t eval(TextCursor& c, int64_t cid) {
    int64_t v = term(c, cid);
    while (true) {
      if (c.accept('+'))
        v += term(c, cid);
      else if (c.accept('-'))
        v -= term(c, cid);
      else
        return v;
    }
  }

private:
  int64_t term(TextCursor& c, int64_t cid) {
    int64_t v = atom(c, cid);
    while (c.accept('*')) v *= atom(c, cid);
    return v;
  }
  int64_t atom(TextCursor& c, int64_t cid) {
    if (c.accept('(')) {
      int64_t v = eval(c, cid);
      c.expect(')');
      return v;
    }
    c.skip_ws();
    if (c.pos < c.line.size() && (std::isdigit(uint8_t(c.line[c.pos])))) {
      size_t used = 0;
      int64_t v = std::stoll(c.line.substr(c.pos), &used, 0);
      c.pos += used;
      return v;
    }
    std::string name = c.ident();
    if (name == "$CID") return cid;
    auto it = consts.find(name);
    if (it == consts.end()) c.fail("unknown name '" + name + "'");
    return it->second;
  }
};

uint8_t parse_reg(TextCursor& c) {
  std::string r = c.ident();
  if (r.size() < 2 || r[0] != 'r') c.fail("expected register rN");
  int n = std::stoi(r.substr(1));
  if (n < 0 || n >= int(kNumRegs)) c.fail("register out of range");
  return uint8_t(n);
}

const std::map<std::string, Opcode>& opcode_names() {
  static const std::map<std::string, Opcode> m = {
      {"movi", Opcode::Movi},       {"add", Opcode::Add},
      {"sub", Opcode::Sub},         {"mul", Opcode::Mul},
      {"mulq", Opcode::MulQ},       {"shra", Opcode::Shra},
      {"divq", Opcode::DivQ},       {"sqrtq", Opcode::SqrtQ},
      {"cadd", Opcode::CAdd},       {"csub", Opcode::CSub},
      {"caddj", Opcode::CAddJ},     {"csubj", Opcode::CSubJ},
      {"cmul", Opcode::CMul},       {"cmulc", Opcode::CMulC},
      {"cmulre", Opcode::CMulRe},   {"cmulim", Opcode::CMulIm},
      {"cmacre", Opcode::CMacRe},   {"cmacim", Opcode::CMacIm},
      {"cmacrec", Opcode::CMacReC}, {"cmacimc", Opcode::CMacImC},
      {"cnormacc", Opcode::CNormAcc}, {"pack", Opcode::Pack},
      {"unpackre", Opcode::UnpackRe}, {"unpackim", Opcode::UnpackIm},
  };
  return m;
}

const char* opcode_name(Opcode op) {
  for (const auto& [n, o] : opcode_names())
    if (o == op) return n.c_str();
  return "?";
}

}  // namespace

RunInput parse_program_text(const std::string& text, uint32_t total_cores) {
  RunInput out;
  out.programs.resize(total_cores);
  ExprEval env;
  std::vector<uint32_t> current_cores;

  std::istringstream ss(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(ss, raw)) {
    ++lineno;
    if (size_t h = raw.find('#'); h != std::string::npos) raw.resize(h);
    TextCursor c{raw, 0, lineno};
    if (c.eof()) continue;
    std::string head = c.ident();

    if (head == "core") {
      current_cores.clear();
      int64_t a = env.eval(c, 0);
      int64_t b = a;
      if (c.accept('.')) {
        c.expect('.');
        b = env.eval(c, 0);
      }
      if (a < 0 || b < a || b >= int64_t(total_cores)) c.fail("core range out of bounds");
      for (int64_t k = a; k <= b; ++k) current_cores.push_back(uint32_t(k));
      continue;
    }
    if (head == "desc") {
      int64_t idx = env.eval(c, 0);
      if (idx != int64_t(out.descriptors.size())) c.fail("descriptors must be sequential");
      DmaDescriptor d;
      while (!c.eof()) {
        std::string key = c.ident();
        c.expect('=');
        if (key == "dir") {
          std::string v = c.ident();
          if (v == "h2l") d.hbm_to_l1 = true;
          else if (v == "l2h") d.hbm_to_l1 = false;
          else c.fail("dir must be h2l or l2h");
          continue;
        }
        int64_t v = env.eval(c, 0);
        if (key == "src") d.src = uint64_t(v);
        else if (key == "dst") d.dst = uint64_t(v);
        else if (key == "row") d.bytes_per_row = uint32_t(v);
        else if (key == "rows") d.rows = uint32_t(v);
        else if (key == "sstride") d.src_stride = uint64_t(v);
        else if (key == "dstride") d.dst_stride = uint64_t(v);
        else c.fail("unknown descriptor field '" + key + "'");
      }
      out.descriptors.push_back(d);
      continue;
    }
    // name = expr  (constant / label definition)
    {
      TextCursor probe = c;
      if (probe.accept('=')) {
        env.consts[head] = env.eval(probe, 0);
        continue;
      }
    }

    if (current_cores.empty()) c.fail("instruction before any 'core' section");
    for (uint32_t cid : current_cores) {
      TextCursor lc{raw, c.pos, lineno};
      Instr in{};
      if (head == "load") {
        uint8_t r = parse_reg(lc);
        lc.expect(',');
        in = Instr::load(r, uint64_t(env.eval(lc, cid)));
      } else if (head == "store") {
        int64_t a = env.eval(lc, cid);
        lc.expect(',');
        in = Instr::store(uint64_t(a), parse_reg(lc));
      } else if (head == "amoadd") {
        uint8_t r = parse_reg(lc);
        lc.expect(',');
        int64_t a = env.eval(lc, cid);
        lc.expect(',');
        in = Instr::amo_add(r, uint64_t(a), parse_reg(lc));
      } else if (head == "movi") {
        uint8_t r = parse_reg(lc);
        lc.expect(',');
        in = Instr::movi(r, int32_t(env.eval(lc, cid)));
      } else if (head == "comp") {
        uint8_t d = parse_reg(lc);
        lc.expect('=');
        std::string opn = lc.ident();
        auto it = opcode_names().find(opn);
        if (it == opcode_names().end()) lc.fail("unknown opcode '" + opn + "'");
        lc.expect('(');
        std::vector<uint8_t> srcs;
        if (!lc.accept(')')) {
          do {
            srcs.push_back(parse_reg(lc));
          } while (lc.accept(','));
          lc.expect(')');
        }
        int32_t imm = 0;
        uint16_t ops = 1;
        uint8_t lat = 1;
        while (!lc.eof()) {
          std::string key = lc.ident();
          lc.expect('=');
          int64_t v = env.eval(lc, cid);
          if (key == "sh" || key == "imm") imm = int32_t(v);
          else if (key == "ops") ops = uint16_t(v);
          else if (key == "lat") lat = uint8_t(v);
          else lc.fail("unknown attribute '" + key + "'");
        }
        if (srcs.size() > 3) lc.fail("too many sources");
        in = Instr::compute(it->second, d, {}, imm, ops, lat);
        in.nsrc = uint8_t(srcs.size());
        for (size_t k = 0; k < srcs.size(); ++k) in.src[k] = srcs[k];
      } else if (head == "barrier") {
        in = Instr::barrier(int32_t(env.eval(lc, cid)));
      } else if (head == "dma_start") {
        in = Instr::dma_start(int32_t(env.eval(lc, cid)));
      } else if (head == "dma_wait") {
        in = Instr::dma_wait();
      } else if (head == "halt") {
        in = Instr::halt();
      } else {
        lc.fail("unknown instruction '" + head + "'");
      }
      if (!lc.eof() && head != "comp") lc.fail("trailing junk");
      out.programs[cid].code.push_back(in);
    }
  }
  return out;
}

std::string format_program(const Program& p) {
  std::ostringstream os;
  for (const Instr& in : p.code) {
    switch (in.kind) {
      case InstrKind::Load:
        os << "load r" << int(in.dst) << ", 0x" << std::hex << in.addr << std::dec;
        break;
      case InstrKind::Store:
        os << "store 0x" << std::hex << in.addr << std::dec << ", r" << int(in.src[0]);
        break;
      case InstrKind::AmoAdd:
        os << "amoadd r" << int(in.dst) << ", 0x" << std::hex << in.addr << std::dec
           << ", r" << int(in.src[0]);
        break;
      case InstrKind::Compute:
        os << "comp r" << int(in.dst) << " = " << opcode_name(in.op) << "(";
        for (int i = 0; i < in.nsrc; ++i) os << (i ? ", r" : "r") << int(in.src[i]);
        os << ") imm=" << in.imm << " ops=" << in.op_count << " lat=" << int(in.latency);
        break;
      case InstrKind::Barrier: os << "barrier " << in.imm; break;
      case InstrKind::DmaStart: os << "dma_start " << in.imm; break;
      case InstrKind::DmaWait: os << "dma_wait"; break;
      case InstrKind::Halt: os << "halt"; break;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace terasim
