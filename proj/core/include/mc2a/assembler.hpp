#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mc2a/isa.hpp"

namespace mc2a {

// Text assembly. A program is a ".hw T=.. K=.. S=.. M=.. B=.." header followed
// by one instruction per line:
//
//   <kind> [field=value ...]      # comment
//
// Fields not listed are zero; a Nop is the bare word "nop". Field names follow
// the packing order (ld<b>.base, ld<b>.i<k>.rv, rf<b>.addr, in<p>.src,
// cu.mode, lane<l>.wb_bank, su.bin, st.en, loop.count, ...). Mode-like fields
// take symbolic values (cu.mode=partial, su.mh=pas_draw, in3.src=rf).
std::string disassemble(const Instruction& ins, const HwConfig& hw);
std::string disassemble_program(const HwConfig& hw, const std::vector<Instruction>& code);

Instruction assemble_line(const std::string& line, const HwConfig& hw, const std::string& file = "<asm>",
                          int lineno = 1);
std::vector<Instruction> assemble_program(std::istream& is, HwConfig& hw, const std::string& file = "<asm>");

}  // namespace mc2a
