export function formatDate(date) {
    const year = date.getFullYear();
    const month = String(date.getMonth() + 1).padStart(2, '0');
    return `${year}-${month}`;
}

export function retry(task, attempts) {
    let lastError = null;
    for (let i = 0; i < attempts; i++) {
        try {
            return task();
        } catch (err) {
            lastError = err;
        }
    }
    throw lastError;
}
