/*
 * rtt_annotations.h
 *
 * Compatibility header for annotated units. The test generator parses the
 * __rtt_* annotations as first-class statements; an ordinary C compiler
 * building the same sources needs them to expand to nothing. Include this
 * header from every annotated translation unit.
 *
 * Annotation forms:
 *   __rtt_precondition(PRE);            assumed on entry
 *   __rtt_postcondition(POST);          checked after the call
 *   __rtt_testcase(PRE, POST, "REQ");   requirement-tagged test case
 *   __rtt_aux(TYPE, NAME);              auxiliary (specification) variable
 *   __rtt_assign(NAME = EXPR);          assignment to an auxiliary variable
 *   __rtt_assert(COND);                 inline proof obligation
 *   __rtt_modifies(VARNAME);            globals the unit may write
 *   __rtt_return                        return value, inside annotations
 *   __rtt_initial(VARNAME)              entry value, inside annotations
 */

#ifndef RTT_ANNOTATIONS_H
#define RTT_ANNOTATIONS_H

#define __rtt_precondition(cond)
#define __rtt_postcondition(cond)
#define __rtt_testcase(...)
#define __rtt_aux(type, name)
#define __rtt_assign(assignment)
#define __rtt_assert(cond)
#define __rtt_modifies(...)
#define __rtt_return 0
#define __rtt_initial(var) (var)

#endif /* RTT_ANNOTATIONS_H */
