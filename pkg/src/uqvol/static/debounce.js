/**
 * Debounce: delays the call until `delayMs` after the last invocation.
 * Used so a burst of TF edits settles into a single render request.
 */
export function debounce(fn, delayMs) {
    let timer = null;
    let lastArgs = null;
    const debounced = (...args) => {
        lastArgs = args;
        if (timer !== null)
            clearTimeout(timer);
        timer = setTimeout(() => {
            timer = null;
            if (lastArgs)
                fn(...lastArgs);
        }, delayMs);
    };
    debounced.cancel = () => {
        if (timer !== null) {
            clearTimeout(timer);
            timer = null;
        }
        lastArgs = null;
    };
    debounced.flush = () => {
        if (timer !== null && lastArgs) {
            clearTimeout(timer);
            timer = null;
            fn(...lastArgs);
        }
    };
    return debounced;
}
