"""Slow, literal reference implementations used as test oracles."""
import math


def relevance(ctx, term, unit):
    return 1.0 if unit in ctx.relevance.get(term, ()) else 0.0


def clarke_de(ctx, t1, t2):
    num = den = 0.0
    for c in range(ctx.total_units):
        r1, r2 = relevance(ctx, t1, c), relevance(ctx, t2, c)
        if r1 > 0 and r2 > 0:
            num += min(r1, r2)
        if r2 > 0:
            den += r2
    return num / den if den else 0.0


def weeds_prec(ctx, t1, t2):
    num = den = 0.0
    for c in range(ctx.total_units):
        r1, r2 = relevance(ctx, t1, c), relevance(ctx, t2, c)
        if r1 > 0 and r2 > 0:
            num += r2
        if r2 > 0:
            den += r2
    return num / den if den else 0.0


def measures(ctx, t1, t2):
    inter = sum(min(relevance(ctx, t1, c), relevance(ctx, t2, c)) for c in range(ctx.total_units))
    fwd, back = clarke_de(ctx, t1, t2), clarke_de(ctx, t2, t1)
    return (weeds_prec(ctx, t1, t2), math.sqrt(fwd * (1 - back)), fwd - back, inter / ctx.total_units)
