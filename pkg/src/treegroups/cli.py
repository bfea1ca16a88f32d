"""Command-line interface: ``treegroups SUBCOMMAND [options]``.

Exit status is 0 when a check passes (or a query is answered), 1 when a
verification fails, and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import automaton, expr, quotient, schreier, stochastic, unrooted, words

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# ------------------------------------------------------------ helpers


def _group(args):
    if args.automaton and args.builtin:
        raise UsageError("give either --builtin or --automaton, not both")
    if args.automaton:
        with open(args.automaton) as fh:
            T = automaton.parse_transducer(fh.read())
    else:
        T = automaton.builtin(args.builtin or "gamma", args.parameter)
    return words.AutomatonGroup(T)


def _name(args):
    return args.builtin or (args.automaton and "file") or "gamma"


def _weights(G, text):
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, _, val = item.partition("=")
        if key.strip() not in G.T.states:
            raise UsageError(f"unknown state {key.strip()!r} in --weights")
        v = val.strip()
        out[key.strip()] = math.sqrt(float(v[5:-1])) if v.startswith("sqrt(") else float(v)
    return out


def _emit(args, payload, text=None):
    out = text if text is not None else json.dumps(payload, indent=2, default=_jsonable) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


def _jsonable(x):
    if hasattr(x, "tolist"):  # numpy arrays and scalars
        return x.tolist()
    return str(x)


def _need(value, flag):
    if value is None:
        raise UsageError(f"{flag} is required")
    return value


# ------------------------------------------------------------ subcommands


def cmd_validate(args):
    G = _group(args)
    rep = automaton.validate(G.T)
    _emit(args, {"automaton": G.T.name, "states": list(G.T.states), "alphabet_size": G.d,
                 "invertible": rep.invertible, "monomial": rep.monomial,
                 "dual_invertible": rep.dual_invertible})
    return EXIT_OK


def cmd_act(args):
    G = _group(args)
    word = G.word(_need(args.word, "--word"))
    v = automaton.format_vertex(automaton.parse_vertex(_need(args.vertex, "--vertex"), G.d), G.d)
    _emit(args, {"word": G.format(word), "vertex": v, "image": G.act(word, v)})
    return EXIT_OK


def cmd_identity(args):
    G = _group(args)
    word = G.word(_need(args.word, "--word"))
    _emit(args, {"word": G.format(word), "identity": G.is_identity(word)})
    return EXIT_OK


def cmd_relators(args):
    G = _group(args)
    rels = args.word_list or list(words.GAMMA_RELATORS)
    rows = words.relator_report(G, rels, args.pmax or 16)
    ok = all(r["identity"] for r in rows)
    _emit(args, {"group": _name(args), "pmax": args.pmax or 16, "relators": rows, "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ball(args):
    G = _group(args)
    radius = _need(args.radius, "--radius")
    B = words.ball(G, radius, _weights(G, args.weights))
    spheres = {}
    for L in B.lengths:
        key = f"{L:.9g}"
        spheres[key] = spheres.get(key, 0) + 1
    payload = {"group": _name(args), "radius": radius, "size": len(B), "spheres": spheres}
    if args.list:
        payload["elements"] = [{"word": G.format(w), "length": L} for w, L in zip(B.words, B.lengths)]
    _emit(args, payload)
    return EXIT_OK


def _contraction_defaults(name):
    if name == "grigorchuk":
        eta = words.grigorchuk_eta()
        return words.grigorchuk_weights(eta), eta, eta, "summed"
    r = 1 / math.sqrt(2)
    return {"a": 1.0, "b": math.sqrt(2)}, r, r, "per-child"


def cmd_contraction(args):
    G = _group(args)
    weights, eta, C, mode = _contraction_defaults(args.builtin or "gamma")
    if args.weights:
        weights = _weights(G, args.weights)
    eta = args.eta if args.eta is not None else eta
    C = args.constant if args.constant is not None else C
    mode = args.mode or mode
    radius = args.radius if args.radius is not None else 8.0
    rep = words.verify_contraction(G, weights, eta, C, radius, mode, args.tol or 1e-9)
    payload = rep.as_dict()
    payload.update({"group": _name(args), "weights": weights,
                    "note": f"checked on the ball of radius {radius}",
                    "growth_exponent": words.growth_exponent(G.d, eta) if 0 < eta < 1 else None})
    payload["violations"] = payload["violations"][:50]
    payload["violation_count"] = len(rep.violations)
    _emit(args, payload)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_schreier(args):
    level = _need(args.level, "--level")
    if args.recursive:
        g = schreier.basilica_recursive_graph(level)
    else:
        g = schreier.schreier_graph(_group(args), level)
    fmt = args.format or "json"
    if fmt == "csv":
        raise UsageError("schreier supports --format json or dot")
    _emit(args, None, schreier.export(g, fmt))
    return EXIT_OK


def cmd_spectrum(args):
    fmt = args.format or "csv"
    if args.cantor is not None:
        values = schreier.cantor_approximation(args.cantor)
        if fmt == "json":
            _emit(args, {"depth": args.cantor, "points": values})
        else:
            _emit(args, None, schreier.spectrum_csv(values))
        return EXIT_OK
    level = _need(args.level, "--level")
    G = _group(args)
    values = schreier.eigenvalues(schreier.hecke_matrix(schreier.schreier_graph(G, level)))
    if fmt == "csv":
        _emit(args, None, schreier.spectrum_csv(values))
        return EXIT_OK
    payload = {"level": level, "eigenvalues": values}
    status = EXIT_OK
    if (args.builtin or "gamma") == "gamma" and not args.automaton:
        rep = schreier.spectrum_check(level, args.tol or 1e-6)
        payload["check"] = rep.as_dict()
        status = EXIT_OK if rep.ok else EXIT_FAIL
    _emit(args, payload)
    return status


def cmd_fcheck(args):
    nmax = args.depth if args.depth is not None else 6
    rep = schreier.verify_det_recursion(args.samples or 100, nmax, args.tol or 1e-8, args.seed)
    payload = {"samples": rep.samples, "nmax": nmax, "tol": rep.tol,
               "max_relative_error": {str(k): v for k, v in rep.max_error.items()}, "ok": rep.ok}
    status = EXIT_OK if rep.ok else EXIT_FAIL
    if args.level is not None:
        srep = schreier.spectrum_check(args.level, 1e-6)
        payload["spectrum"] = srep.as_dict()
        status = status if srep.ok else EXIT_FAIL
    _emit(args, payload)
    return status


def cmd_montecarlo(args):
    G = _group(args)
    n = args.length or 20000
    samples = args.samples or 5000
    st = stochastic.estimate_contraction(G, n, samples, args.seed)
    _emit(args, {"group": _name(args), "n": n, "samples": samples, "seed": args.seed,
                 "mu_hat": st.mu_hat, "eta_hat": st.eta_hat,
                 "stderr_mu": st.stderr_mu, "stderr_eta": st.stderr_eta})
    return EXIT_OK


def cmd_cogrowth(args):
    G = _group(args)
    nmax = args.length if args.length is not None else 10
    rows = stochastic.exact_cogrowth(G, nmax)
    first = next((r.n for r in rows if r.n > 0 and r.trivial > 0), None)
    _emit(args, {"group": _name(args), "nmax": nmax, "first_relation_length": first,
                 "rows": [{"n": r.n, "reduced": r.reduced, "trivial": r.trivial} for r in rows]})
    return EXIT_OK


def cmd_quotient(args):
    G = _group(args)
    n = _need(args.level, "--level")
    order = quotient.group_order(G, None, n)
    gamma = (args.builtin or "gamma") == "gamma" and not args.automaton
    payload = {"n": n, "order": str(order),
               "predicted": str(quotient.predicted_order_basilica(n)) if gamma else None,
               "hausdorff_estimate": quotient.hausdorff_estimate(G, n) if n >= 1 else None}
    if args.derived:
        payload["derived_index"] = str(quotient.derived_index(G, n))
    for w in args.word_list or []:
        payload.setdefault("element_orders", {})[w] = quotient.element_order(G, w, n)
    _emit(args, payload)
    return EXIT_FAIL if gamma and payload["order"] != payload["predicted"] else EXIT_OK


def cmd_hnn(args):
    preset = args.preset or "delta"
    if preset == "thompson":
        return cmd_thompson(args)
    if preset not in ("delta", "gtilde"):
        raise UsageError("--preset must be delta, gtilde or thompson")
    depth = args.depth if args.depth is not None else 14
    payload = {"preset": preset, "depth": depth}
    if preset == "gtilde":
        gate = unrooted.verify_conjugation_identity("gtilde", 20, min(depth, 8), args.seed)
        payload["conjugation_identity"] = gate
        if not gate:
            payload["ok"] = False
            payload["note"] = "t-action formulas disagree with the conjugation identity; no results reported"
            _emit(args, payload)
            return EXIT_FAIL
    payload["relators"] = [r.as_dict() for r in unrooted.verify_unrooted_relators(preset, depth)]
    ok = all(r["ok"] for r in payload["relators"])
    if preset == "delta":
        rel = unrooted.delta_relations(min(depth, 10))
        payload["relations"] = {"depth": min(depth, 10), **rel}
        ok = ok and all(rel.values())
    radius = int(args.radius) if args.radius is not None else 8
    payload["transitive"] = {"radius": radius, "ok": unrooted.transitivity_check(preset, radius)}
    ok = ok and payload["transitive"]["ok"]
    payload["ok"] = ok
    _emit(args, payload)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_thompson(args):
    res = unrooted.verify_thompson_relators()
    ok = all(res.values())
    _emit(args, {"relators": [{"relator": k, "identity": v} for k, v in res.items()],
                 "exact": True, "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "validate": (cmd_validate, "invertibility, monomial and dual-invertibility flags of a transducer"),
    "act": (cmd_act, "image of a vertex under a word: (xw)^q = lambda(q,x) w^tau(q,x)"),
    "identity": (cmd_identity, "exact word problem via the contracting recursion"),
    "relators": (cmd_relators, "check the relator family [[a^p,b^p],b^p], [[b^p,a^2p],a^2p] for p = 1, 2, 4, ..., pmax"),
    "ball": (cmd_ball, "elements of weighted length at most --radius"),
    "contraction": (cmd_contraction, "check |g_x| <= eta|g| + C (per-child) or the summed form on a ball"),
    "schreier": (cmd_schreier, "level-n Schreier graph as DOT or JSON; --recursive uses the polygon construction"),
    "spectrum": (cmd_spectrum, "eigenvalues of 1/4(a + a^-1 + b + b^-1) on level n; --cantor D gives the roots of Q_D"),
    "fcheck": (cmd_fcheck, "check Q_{n+1}(p) = Q_n(F(p)) at random points"),
    "montecarlo": (cmd_montecarlo, "estimate mu and eta from random reduced words"),
    "cogrowth": (cmd_cogrowth, "count reduced words of each length that represent 1"),
    "quotient": (cmd_quotient, "order of the level-n quotient, compared with 2^((2/3)(2^n + floor(3n/2)/2 - 1))"),
    "hnn-verify": (cmd_hnn, "relators, relations and transitivity for actions on the 3-regular tree"),
    "thompson": (cmd_thompson, "exact check of [tu^-1, u^t] and [tu^-1, u^(t^2)] as PL maps"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="treegroups", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text, description=help_text)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--builtin", choices=["gamma", "bsv", "grigorchuk", "aleshin", "mandelbrot"])
        src.add_argument("--automaton", metavar="FILE")
        s.add_argument("--parameter", help="kneading word for the mandelbrot family")
        s.add_argument("--word", help="word expression, e.g. \"[b^a,b]\"")
        s.add_argument("--words", dest="word_list", nargs="+", help="several word expressions")
        s.add_argument("--vertex", help="vertex word such as 1211")
        s.add_argument("--level", type=int)
        s.add_argument("--depth", type=int)
        s.add_argument("--radius", type=float)
        s.add_argument("--length", type=int)
        s.add_argument("--samples", type=int)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--pmax", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--out")
        s.add_argument("--format", choices=["json", "csv", "dot"])
        s.add_argument("--weights", help="state weights, e.g. a=1,b=sqrt(2)")
        s.add_argument("--eta", type=float)
        s.add_argument("--C", dest="constant", type=float)
        s.add_argument("--mode", choices=["per-child", "summed"])
        s.add_argument("--list", action="store_true", help="list ball elements")
        s.add_argument("--recursive", action="store_true")
        s.add_argument("--cantor", type=int, metavar="DEPTH")
        s.add_argument("--derived", action="store_true", help="also compute the derived subgroup index")
        s.add_argument("--order", action="store_true", help="report the order (always on)")
        s.add_argument("--preset", choices=["delta", "gtilde", "thompson"])
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command == "relators" and args.word and not args.word_list:
        args.word_list = [args.word]
    if args.command == "quotient" and args.word and not args.word_list:
        args.word_list = [args.word]
    try:
        return COMMANDS[args.command][0](args)
    except expr.ExpressionError as exc:
        sys.stderr.write(f"error: {exc}\n\nword grammar:\n{expr.__doc__}\n")
        return EXIT_USAGE
    except (UsageError, automaton.AutomatonError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
