#pragma once

// Closed-form per-input outputs, fidelities and success probabilities of the
// four protocols. These are the fast engine; the TeleportMap pipeline is the
// oracle they are checked against.

#include "hybridtele/channels.hpp"
#include "hybridtele/teleport.hpp"

namespace hybridtele {

/// Corrected is the default everywhere. Legacy reproduces known-faulty
/// closed forms verbatim so the deviation can be measured.
enum class Form { Corrected, Legacy };

/// The constant A in P_PtoC = t^2 (1 + A u)/2: A = exp(-2 alpha^2) = Q S,
/// independent of t.
double pc_success_constant(const ChannelParams& p);

double per_input_fidelity(const Protocol& protocol, const BlochInput& in, const ChannelParams& p,
                          Form form = Form::Corrected);

/// Post-selected protocols include the t^2/2 stage overhead.
double per_input_success_probability(const Protocol& protocol, const BlochInput& in, const ChannelParams& p);

/// Normalized output state of the success branches.
///   PtoC: [|a|^2 |b><b| + |b|^2 |-b><-b| + Q(a b* |b><-b| + h.c.)]/(1 + A u) on Fock(dim), b = t alpha
///   CtoP: t^2|a|^2 HH + t^2|b|^2 VV + (1-t^2) 00 + t^2 Q (a b* HV + h.c.)
///   PtoS: (|a|^2 + (1-t^2)|b|^2) 00 + t^2|b|^2 11 + t (a b* 01 + h.c.)
///   StoP: [(t^4|a|^2 + t^2(1-t^2)|b|^2) HH + t^2|b|^2 VV
///          + (t^2(1-t^2)|a|^2 + (1-t^2)(2-t^2)|b|^2) 00 + t^3 (a b* HV + h.c.)]/(4 P3)
/// Post-selected variants drop the vacuum row and renormalize.
DensityOperator closed_form_output(const Protocol& protocol, const BlochInput& in, const ChannelParams& p,
                                   int dim = 2);

}  // namespace hybridtele
