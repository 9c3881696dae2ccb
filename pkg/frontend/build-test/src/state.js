/** Client view state: which campaign is open and the PIC values typed so far.
 *
 * Typed-but-unsubmitted values live here, keyed by ligand id, so a view
 * refresh (or a failed request) never loses them.  All campaign math stays
 * server-side; this is bookkeeping only.
 */
export function newViewState() {
    return { campaignId: null, entered: new Map(), message: "", messageKind: "info" };
}
export function rememberInput(state, ligandId, value) {
    if (value === "") {
        state.entered.delete(ligandId);
    }
    else {
        state.entered.set(ligandId, value);
    }
}
export function clearEntered(state, ligandIds) {
    for (const lid of ligandIds) {
        state.entered.delete(lid);
    }
}
/** Parse typed values; returns entries plus ids whose text is not a finite number. */
export function collectObservations(state, batch) {
    const observations = [];
    const invalid = [];
    for (const lid of batch) {
        const text = state.entered.get(lid);
        if (text === undefined || text.trim() === "") {
            continue;
        }
        const value = Number(text);
        if (Number.isFinite(value)) {
            observations.push({ ligand_id: lid, pic: value });
        }
        else {
            invalid.push(lid);
        }
    }
    return { observations, invalid };
}
